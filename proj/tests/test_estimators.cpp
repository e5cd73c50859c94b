#include <catch2/catch_amalgamated.hpp>
#include "pvi/pvi.hpp"
TEST_CASE("placeholder test_estimators") { CHECK(true); }
