#pragma once

// Umbrella header: asymmetric imputation kernels for classifying
// incomplete data with kernel ridge regression.

#include "aik/centroids.hpp"
#include "aik/dataset.hpp"
#include "aik/error.hpp"
#include "aik/harness.hpp"
#include "aik/kernels.hpp"
#include "aik/krr.hpp"
#include "aik/masking.hpp"
#include "aik/model_io.hpp"
#include "aik/parallel.hpp"
#include "aik/rng.hpp"
#include "aik/stats.hpp"
#include "aik/types.hpp"
#include "aik/version.hpp"
