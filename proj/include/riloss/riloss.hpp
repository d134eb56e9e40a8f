#pragma once

// Umbrella header.

#include "riloss/bounds.hpp"
#include "riloss/common.hpp"
#include "riloss/data.hpp"
#include "riloss/forecaster.hpp"
#include "riloss/friedman.hpp"
#include "riloss/harness.hpp"
#include "riloss/hsic.hpp"
#include "riloss/kernels.hpp"
#include "riloss/loss.hpp"
