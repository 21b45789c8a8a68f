#pragma once

#include "idofew/clustering.hpp"
#include "idofew/config.hpp"
#include "idofew/corpus.hpp"
#include "idofew/embed.hpp"
#include "idofew/errors.hpp"
#include "idofew/eval.hpp"
#include "idofew/kmeans.hpp"
#include "idofew/model.hpp"
#include "idofew/pipeline.hpp"
#include "idofew/rng.hpp"
#include "idofew/sib.hpp"
#include "idofew/stopwords.hpp"
#include "idofew/synth.hpp"
#include "idofew/tfidf.hpp"
#include "idofew/version.hpp"
