#pragma once

#include "csca/attention.hpp"
#include "csca/cfa.hpp"
#include "csca/error.hpp"
#include "csca/gradcheck.hpp"
#include "csca/kernels.hpp"
#include "csca/metrics.hpp"
#include "csca/network.hpp"
#include "csca/ops.hpp"
#include "csca/random.hpp"
#include "csca/serialize.hpp"
#include "csca/synthdata.hpp"
#include "csca/tensor.hpp"
