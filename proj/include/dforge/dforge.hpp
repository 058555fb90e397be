#ifndef DFORGE_DFORGE_HPP
#define DFORGE_DFORGE_HPP

#include "dforge/coefficient.hpp"
#include "dforge/dynamics.hpp"
#include "dforge/effective.hpp"
#include "dforge/errors.hpp"
#include "dforge/fock.hpp"
#include "dforge/operator_expr.hpp"
#include "dforge/parser.hpp"
#include "dforge/scenario.hpp"

#endif  // DFORGE_DFORGE_HPP
