#pragma once

#include "checkpoint.hpp"
#include "config.hpp"
#include "data.hpp"
#include "error.hpp"
#include "eval.hpp"
#include "model.hpp"
#include "params.hpp"
#include "rng.hpp"
#include "synth.hpp"
#include "tensor.hpp"
#include "training.hpp"
