#pragma once

#include "saakit/align.hpp"
#include "saakit/audio.hpp"
#include "saakit/cluster.hpp"
#include "saakit/corpus.hpp"
#include "saakit/error.hpp"
#include "saakit/random.hpp"
#include "saakit/report.hpp"
#include "saakit/synth.hpp"
#include "saakit/tags.hpp"
