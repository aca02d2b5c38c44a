#pragma once

// Umbrella include for the whole library.

#include <hetero/errors.hpp>
#include <hetero/numerics.hpp>
#include <hetero/potential.hpp>
#include <hetero/geodesic.hpp>
#include <hetero/dynamics.hpp>
#include <hetero/action.hpp>
#include <hetero/analysis.hpp>
#include <hetero/io.hpp>
