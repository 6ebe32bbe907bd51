#pragma once

#include "dcekit/data.hpp"
#include "dcekit/design.hpp"
#include "dcekit/error.hpp"
#include "dcekit/mixl.hpp"
#include "dcekit/mnl.hpp"
#include "dcekit/model_spec.hpp"
#include "dcekit/potential.hpp"
#include "dcekit/predicate.hpp"
#include "dcekit/qmc.hpp"
#include "dcekit/serialize.hpp"
#include "dcekit/simulate.hpp"
#include "dcekit/welfare.hpp"
