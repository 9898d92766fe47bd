#pragma once

#include "fsaloha/harness/config.hpp"
#include "fsaloha/harness/experiment.hpp"
#include "fsaloha/harness/parallel.hpp"
#include "fsaloha/harness/records.hpp"
#include "fsaloha/harness/summary.hpp"
