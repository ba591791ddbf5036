#pragma once

#include "ebitflow/channels.hpp"
#include "ebitflow/commands.hpp"
#include "ebitflow/entanglement.hpp"
#include "ebitflow/errors.hpp"
#include "ebitflow/experiment.hpp"
#include "ebitflow/io.hpp"
#include "ebitflow/layout.hpp"
#include "ebitflow/protocol.hpp"
#include "ebitflow/rng.hpp"
#include "ebitflow/states.hpp"
#include "ebitflow/tensor.hpp"
#include "ebitflow/unitaries.hpp"
#include "ebitflow/version.hpp"
