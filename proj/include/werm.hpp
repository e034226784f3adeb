#pragma once

#include "werm/closed_form.hpp"
#include "werm/errors.hpp"
#include "werm/eumax.hpp"
#include "werm/integral_system.hpp"
#include "werm/kkt.hpp"
#include "werm/measure.hpp"
#include "werm/oracle.hpp"
#include "werm/risk.hpp"
#include "werm/riskmin.hpp"
#include "werm/statespace.hpp"
#include "werm/utility.hpp"
