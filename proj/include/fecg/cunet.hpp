#pragma once

#include "fecg/cunet/activation.hpp"
#include "fecg/cunet/checkpoint.hpp"
#include "fecg/cunet/layers.hpp"
#include "fecg/cunet/model.hpp"
#include "fecg/cunet/tensor.hpp"
#include "fecg/cunet/train.hpp"
