// Quadrature is header-only; this translation unit checks the header compiles standalone.
#include "renewal/quadrature.hpp"
