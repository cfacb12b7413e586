// SPDX-License-Identifier: Apache-2.0
#ifndef FAP_FAP_HPP
#define FAP_FAP_HPP

#include "fap/channel_model.hpp"
#include "fap/complexity.hpp"
#include "fap/constellation.hpp"
#include "fap/det_equiv.hpp"
#include "fap/experiment.hpp"
#include "fap/finite_alphabet.hpp"
#include "fap/io.hpp"
#include "fap/optimizer.hpp"
#include "fap/partition.hpp"
#include "fap/precoder.hpp"
#include "fap/quadrature.hpp"
#include "fap/random.hpp"
#include "fap/special_cases.hpp"
#include "fap/types.hpp"

#endif  // FAP_FAP_HPP
