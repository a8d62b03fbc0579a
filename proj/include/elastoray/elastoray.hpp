#pragma once

#include "elastoray/boundary.hpp"
#include "elastoray/errors.hpp"
#include "elastoray/linalg.hpp"
#include "elastoray/medium.hpp"
#include "elastoray/polarization.hpp"
#include "elastoray/rays.hpp"
#include "elastoray/symbols.hpp"
#include "elastoray/verify.hpp"
