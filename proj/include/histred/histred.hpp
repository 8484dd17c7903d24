#ifndef HISTRED_HISTRED_HPP
#define HISTRED_HISTRED_HPP

#include "histred/corpus.hpp"
#include "histred/corpus_io.hpp"
#include "histred/model/checkpoint.hpp"
#include "histred/model/cross_attention.hpp"
#include "histred/model/encoder.hpp"
#include "histred/model/heads.hpp"
#include "histred/model/re_model.hpp"
#include "histred/segmenter.hpp"
#include "histred/split.hpp"
#include "histred/stats.hpp"
#include "histred/taxonomy.hpp"
#include "histred/tokenizer.hpp"
#include "histred/train/experiment.hpp"
#include "histred/train/metrics.hpp"
#include "histred/train/trainer.hpp"
#include "histred/version.hpp"

#endif  // HISTRED_HISTRED_HPP
