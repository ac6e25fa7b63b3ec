#pragma once

// Everything except the HTTP backend (include kgtopo/http_backend.hpp for that).

#include "kgtopo/error.hpp"
#include "kgtopo/text.hpp"
#include "kgtopo/kg_store.hpp"
#include "kgtopo/prompt_templates.hpp"
#include "kgtopo/prompt_engine.hpp"
#include "kgtopo/ontology.hpp"
#include "kgtopo/topo_paths.hpp"
#include "kgtopo/llm_gateway.hpp"
#include "kgtopo/predictor.hpp"
#include "kgtopo/eval_harness.hpp"
#include "kgtopo/run_config.hpp"
