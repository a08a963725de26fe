// Umbrella header.
#pragma once

#include "checkpoint.hpp"
#include "clip.hpp"
#include "config.hpp"
#include "dataset.hpp"
#include "error.hpp"
#include "eval.hpp"
#include "experiments.hpp"
#include "flow.hpp"
#include "gradcheck.hpp"
#include "image.hpp"
#include "labels.hpp"
#include "models.hpp"
#include "nn.hpp"
#include "ontology.hpp"
#include "pipeline.hpp"
#include "rng.hpp"
#include "synthetic.hpp"
#include "tensor.hpp"
#include "train.hpp"
