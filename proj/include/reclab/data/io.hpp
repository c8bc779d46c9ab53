#pragma once

#include <string>
#include <vector>

#include "reclab/common/error.hpp"
#include "reclab/data/types.hpp"

namespace reclab::data {

// Column-name mapping from the logical fields to the file's header names.
// Defaults follow the public challenge field names.
struct ColumnSchema {
  std::string user_id = "user_id";
  std::string trip_id = "utrip_id";
  std::string city_id = "city_id";
  std::string country_id = "hotel_country";
  std::string booker_country = "booker_country";
  std::string device_class = "device_class";
  std::string checkin = "checkin";
  std::string checkout = "checkout";
  char delimiter = ',';
};

struct LoadReport {
  std::vector<MalformedRow> malformed;
  std::size_t rows_total = 0;
  std::size_t rows_kept = 0;
};

// Groups rows by trip id, sorts each trip by checkin, assigns step indices.
// Malformed rows are collected; loading aborts if more than `max_bad_ratio`
// of data rows are malformed.
TripDataset load_trips(const std::string& path, const ColumnSchema& schema = {},
                       LoadReport* report = nullptr,
                       double max_bad_ratio = 0.01);

// Serializes in the same delimited format (header + one row per reservation,
// trips in dataset order, steps in order). Bit-stable for a fixed dataset.
void save_trips(const TripDataset& ds, const std::string& path,
                const ColumnSchema& schema = {});

std::string trips_to_csv(const TripDataset& ds, const ColumnSchema& schema = {});

}  // namespace reclab::data
