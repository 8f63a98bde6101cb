#include <gtest/gtest.h>

#include "designer/analytics.hpp"
#include "designer/curation.hpp"
#include "designer/http_transport.hpp"
#include "designer/jsonl.hpp"
#include "designer/logic.hpp"
#include "designer/mock_provider.hpp"
#include "designer/postprocess.hpp"
#include "designer/pipeline/pipeline.hpp"
#include "designer/qbank.hpp"
#include "designer/retrieval.hpp"
#include "designer/synthesis.hpp"

TEST(Smoke, Compiles) { SUCCEED(); }
