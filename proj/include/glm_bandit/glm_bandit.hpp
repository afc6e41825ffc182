#pragma once

#include "glm_bandit/environment.hpp"
#include "glm_bandit/errors.hpp"
#include "glm_bandit/harness.hpp"
#include "glm_bandit/linalg.hpp"
#include "glm_bandit/link.hpp"
#include "glm_bandit/mle.hpp"
#include "glm_bandit/policy.hpp"
#include "glm_bandit/rng.hpp"
#include "glm_bandit/simulation.hpp"
#include "glm_bandit/supcb_glm.hpp"
#include "glm_bandit/validation.hpp"
