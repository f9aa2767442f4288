#pragma once

// Umbrella header for the tensor ⋆_M-product DMD library.

#include "tdmd/error.hpp"
#include "tdmd/parallel.hpp"
#include "tdmd/tensor.hpp"
#include "tdmd/transform.hpp"
#include "tdmd/algebra.hpp"
#include "tdmd/decomp.hpp"
#include "tdmd/dmd.hpp"
#include "tdmd/streaming.hpp"
#include "tdmd/datasets.hpp"
#include "tdmd/experiment.hpp"
