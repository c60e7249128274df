#pragma once

#include "hifanet/attention.hpp"
#include "hifanet/autodiff.hpp"
#include "hifanet/baselines.hpp"
#include "hifanet/checkpoint.hpp"
#include "hifanet/config.hpp"
#include "hifanet/datagen.hpp"
#include "hifanet/dataset_io.hpp"
#include "hifanet/errors.hpp"
#include "hifanet/geometry.hpp"
#include "hifanet/gradcheck.hpp"
#include "hifanet/observation.hpp"
#include "hifanet/tensor.hpp"
#include "hifanet/training.hpp"
