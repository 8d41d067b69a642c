#pragma once

#include "prex/alias_table.hpp"
#include "prex/classifier.hpp"
#include "prex/common.hpp"
#include "prex/corpus.hpp"
#include "prex/dataset.hpp"
#include "prex/encoder.hpp"
#include "prex/eval.hpp"
#include "prex/graph_embed.hpp"
#include "prex/io.hpp"
#include "prex/mutrel.hpp"
#include "prex/synth.hpp"
#include "prex/typefeat.hpp"
