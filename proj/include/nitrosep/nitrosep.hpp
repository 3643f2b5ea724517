#pragma once

// Everything except the HTTP transport (nitrosep/http_transport.hpp), which
// pulls in cpp-httplib and needs a threads library.

#include "nitrosep/config.hpp"
#include "nitrosep/diagnostics.hpp"
#include "nitrosep/error.hpp"
#include "nitrosep/fa.hpp"
#include "nitrosep/fetch.hpp"
#include "nitrosep/ica.hpp"
#include "nitrosep/ingest.hpp"
#include "nitrosep/matrix.hpp"
#include "nitrosep/numfmt.hpp"
#include "nitrosep/pca.hpp"
#include "nitrosep/pipeline.hpp"
#include "nitrosep/preprocess.hpp"
#include "nitrosep/random.hpp"
#include "nitrosep/synth.hpp"
#include "nitrosep/table.hpp"
