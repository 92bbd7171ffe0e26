#pragma once

#include "mslkit/classify.hpp"
#include "mslkit/dataset.hpp"
#include "mslkit/eigen.hpp"
#include "mslkit/errors.hpp"
#include "mslkit/feature_file.hpp"
#include "mslkit/model.hpp"
#include "mslkit/model_file.hpp"
#include "mslkit/msl.hpp"
#include "mslkit/parallel.hpp"
#include "mslkit/report.hpp"
#include "mslkit/synth.hpp"
#include "mslkit/tensor.hpp"
