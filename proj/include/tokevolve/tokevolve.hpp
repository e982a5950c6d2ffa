#pragma once

#include "tokevolve/byte_map.hpp"
#include "tokevolve/corpus.hpp"
#include "tokevolve/embedding.hpp"
#include "tokevolve/error.hpp"
#include "tokevolve/evolve.hpp"
#include "tokevolve/io.hpp"
#include "tokevolve/packing.hpp"
#include "tokevolve/pppl.hpp"
#include "tokevolve/pre_tokenizer.hpp"
#include "tokevolve/sentences.hpp"
#include "tokevolve/tokenizer.hpp"
#include "tokevolve/trainer.hpp"
#include "tokevolve/validate.hpp"
