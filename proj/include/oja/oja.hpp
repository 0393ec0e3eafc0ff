#pragma once

#include <oja/errors.hpp>
#include <oja/timeutil.hpp>
#include <oja/digest.hpp>
#include <oja/rng.hpp>
#include <oja/csv.hpp>
#include <oja/datamodel.hpp>
#include <oja/dataset_io.hpp>
#include <oja/ingest.hpp>
#include <oja/profiles.hpp>
#include <oja/clean.hpp>
#include <oja/stats.hpp>
#include <oja/models.hpp>
#include <oja/simulate.hpp>
#include <oja/svg.hpp>
#include <oja/report.hpp>
#include <oja/cli.hpp>
