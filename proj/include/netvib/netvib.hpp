#pragma once

#include "netvib/topology.hpp"
#include "netvib/netspec.hpp"
#include "netvib/quadrature.hpp"
#include "netvib/fem.hpp"
#include "netvib/evolve.hpp"
#include "netvib/spectral.hpp"
#include "netvib/oracle.hpp"
#include "netvib/io.hpp"
