#include <cstdio>
#include "nsquant/nsquant.hpp"
int main() { std::puts(nsquant::version); return 0; }
