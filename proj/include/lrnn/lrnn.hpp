#pragma once

#include "lrnn/activations.hpp"
#include "lrnn/errors.hpp"
#include "lrnn/grounder.hpp"
#include "lrnn/io.hpp"
#include "lrnn/logic.hpp"
#include "lrnn/molecules.hpp"
#include "lrnn/netbuild.hpp"
#include "lrnn/trainer.hpp"
#include "lrnn/xval.hpp"
