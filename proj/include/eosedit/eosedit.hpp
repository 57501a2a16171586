#pragma once

// Convenience umbrella for the whole library.

#include "eosedit/edit.hpp"
#include "eosedit/errors.hpp"
#include "eosedit/pipeline.hpp"
#include "eosedit/png.hpp"
#include "eosedit/rng.hpp"
#include "eosedit/safetensors.hpp"
#include "eosedit/sampler.hpp"
#include "eosedit/schedule.hpp"
#include "eosedit/text_encoder.hpp"
#include "eosedit/tokenizer.hpp"
#include "eosedit/unicode.hpp"
