#include "pvi/pvi.hpp"
int main() { return 0; }
