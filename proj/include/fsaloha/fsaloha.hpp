#pragma once

#include "fsaloha/activity.hpp"
#include "fsaloha/allocation.hpp"
#include "fsaloha/detector.hpp"
#include "fsaloha/metrics.hpp"
#include "fsaloha/optimizer.hpp"
#include "fsaloha/random.hpp"
#include "fsaloha/types.hpp"
