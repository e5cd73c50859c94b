#include <catch2/catch_amalgamated.hpp>
#include "pvi/pvi.hpp"
TEST_CASE("placeholder test_metrics") { CHECK(true); }
