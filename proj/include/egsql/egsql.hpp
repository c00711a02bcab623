#pragma once

// Umbrella header: execution-guided decoding for single-table text-to-SQL.

#include "egsql/actions.hpp"
#include "egsql/ast.hpp"
#include "egsql/decoder.hpp"
#include "egsql/errors.hpp"
#include "egsql/eval.hpp"
#include "egsql/executor.hpp"
#include "egsql/features.hpp"
#include "egsql/oracle_scorer.hpp"
#include "egsql/scorer.hpp"
#include "egsql/sketch_model.hpp"
#include "egsql/sql.hpp"
#include "egsql/synthetic.hpp"
#include "egsql/table.hpp"
#include "egsql/template_model.hpp"
#include "egsql/text.hpp"
