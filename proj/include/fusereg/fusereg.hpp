#pragma once

#include "fusereg/basis_ls.hpp"
#include "fusereg/config.hpp"
#include "fusereg/corpus.hpp"
#include "fusereg/csv.hpp"
#include "fusereg/discrete.hpp"
#include "fusereg/errors.hpp"
#include "fusereg/evaluate.hpp"
#include "fusereg/function_class.hpp"
#include "fusereg/fusion.hpp"
#include "fusereg/gaussian.hpp"
#include "fusereg/harness.hpp"
#include "fusereg/kernel.hpp"
#include "fusereg/linalg.hpp"
#include "fusereg/moments.hpp"
#include "fusereg/numio.hpp"
#include "fusereg/pca.hpp"
#include "fusereg/predictor.hpp"
#include "fusereg/projection.hpp"
#include "fusereg/property_suite.hpp"
#include "fusereg/sampling.hpp"
#include "fusereg/single_domain.hpp"
