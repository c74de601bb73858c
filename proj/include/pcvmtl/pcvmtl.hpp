#pragma once

#include "pcvmtl/data.hpp"
#include "pcvmtl/error.hpp"
#include "pcvmtl/eval.hpp"
#include "pcvmtl/kernel.hpp"
#include "pcvmtl/nbt.hpp"
#include "pcvmtl/nystrom.hpp"
#include "pcvmtl/pcvm.hpp"
#include "pcvmtl/pipelines.hpp"
#include "pcvmtl/random.hpp"
#include "pcvmtl/serialization.hpp"
#include "pcvmtl/tkl.hpp"
#include "pcvmtl/toy.hpp"
