#pragma once

#include "pacr/dsl/ast.hpp"
#include "pacr/dsl/eval.hpp"
#include "pacr/dsl/parser.hpp"
#include "pacr/dsl/printer.hpp"
#include "pacr/dsl/validate.hpp"
