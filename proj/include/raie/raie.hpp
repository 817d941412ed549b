#ifndef RAIE_RAIE_HPP
#define RAIE_RAIE_HPP

#include <raie/binary_io.hpp>
#include <raie/config/kv_config.hpp>
#include <raie/data/events.hpp>
#include <raie/data/temporal.hpp>
#include <raie/error.hpp>
#include <raie/eval/experiment.hpp>
#include <raie/eval/geometry.hpp>
#include <raie/eval/metrics.hpp>
#include <raie/eval/report.hpp>
#include <raie/eval/state_io.hpp>
#include <raie/model/adapter.hpp>
#include <raie/model/backbone.hpp>
#include <raie/model/checkpoint.hpp>
#include <raie/model/item_vocab.hpp>
#include <raie/model/prompt.hpp>
#include <raie/model/training.hpp>
#include <raie/quantile.hpp>
#include <raie/region/region_set.hpp>
#include <raie/region/region_store.hpp>
#include <raie/region/separation.hpp>
#include <raie/region/snapshot.hpp>
#include <raie/region/spherical_kmeans.hpp>
#include <raie/region/unit_vector.hpp>
#include <raie/sim/drift.hpp>

#endif  // RAIE_RAIE_HPP
