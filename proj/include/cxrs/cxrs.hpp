#pragma once

#include "cxrs/augment.hpp"
#include "cxrs/autograd.hpp"
#include "cxrs/checkpoint.hpp"
#include "cxrs/config.hpp"
#include "cxrs/dataset.hpp"
#include "cxrs/error.hpp"
#include "cxrs/eval.hpp"
#include "cxrs/image.hpp"
#include "cxrs/image_io.hpp"
#include "cxrs/nn.hpp"
#include "cxrs/optim.hpp"
#include "cxrs/rng.hpp"
#include "cxrs/scoring.hpp"
#include "cxrs/tensor.hpp"
#include "cxrs/train.hpp"
