#pragma once

#include "cve/bandwidth.hpp"
#include "cve/csv.hpp"
#include "cve/dataset.hpp"
#include "cve/dimension.hpp"
#include "cve/errors.hpp"
#include "cve/gradients.hpp"
#include "cve/manifold.hpp"
#include "cve/objective.hpp"
#include "cve/optimizer.hpp"
#include "cve/parallel.hpp"
#include "cve/rng.hpp"
#include "cve/simsuite.hpp"
