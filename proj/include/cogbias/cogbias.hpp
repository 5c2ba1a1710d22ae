#ifndef COGBIAS_COGBIAS_HPP
#define COGBIAS_COGBIAS_HPP

// Everything except the HTTP transport, which lives in harness_http.hpp.

#include "attribution/kmeans.hpp"
#include "attribution/pca.hpp"
#include "attribution/permutation.hpp"
#include "attribution/profile.hpp"
#include "attribution/quality.hpp"
#include "attribution/separation.hpp"
#include "attribution/study.hpp"
#include "attribution/vectors.hpp"
#include "catalog.hpp"
#include "error.hpp"
#include "harness.hpp"
#include "io/config.hpp"
#include "io/csv.hpp"
#include "io/jsonl.hpp"
#include "io/report.hpp"
#include "random.hpp"
#include "randomness.hpp"
#include "scoring.hpp"
#include "stats.hpp"
#include "synthetic.hpp"
#include "types.hpp"
#include "validate.hpp"

#endif
