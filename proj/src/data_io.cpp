#include "reclab/data/io.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "reclab/common/csv.hpp"

namespace reclab::data {

namespace {

int find_column(const std::vector<std::string>& header, const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  throw MissingColumn(name);
}

}  // namespace

TripDataset load_trips(const std::string& path, const ColumnSchema& schema,
                       LoadReport* report, double max_bad_ratio) {
  auto lines = read_lines(path);
  if (lines.empty()) throw MalformedInput("empty file: " + path);

  auto header = split_delimited(lines[0], schema.delimiter);
  const int c_user = find_column(header, schema.user_id);
  const int c_trip = find_column(header, schema.trip_id);
  const int c_city = find_column(header, schema.city_id);
  const int c_country = find_column(header, schema.country_id);
  const int c_booker = find_column(header, schema.booker_country);
  const int c_device = find_column(header, schema.device_class);
  const int c_checkin = find_column(header, schema.checkin);
  const int c_checkout = find_column(header, schema.checkout);
  const int need = static_cast<int>(header.size());

  LoadReport local;
  LoadReport& rep = report ? *report : local;

  // Preserves first-appearance order of trips in the file.
  std::map<std::string, std::size_t> trip_index;
  std::vector<Trip> trips;

  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (lines[ln].empty()) continue;
    ++rep.rows_total;
    auto f = split_delimited(lines[ln], schema.delimiter);
    auto bad = [&](const std::string& why) {
      rep.malformed.push_back({static_cast<long>(ln + 1), why});
    };
    if (static_cast<int>(f.size()) != need) {
      bad("expected " + std::to_string(need) + " fields, got " +
          std::to_string(f.size()));
      continue;
    }
    auto ci = parse_date(f[c_checkin]);
    auto co = parse_date(f[c_checkout]);
    if (!ci || !co) {
      bad("unparseable date");
      continue;
    }
    if (*co < *ci) {
      bad("checkout before checkin");
      continue;
    }
    Reservation r;
    r.user_id = f[c_user];
    r.trip_id = f[c_trip];
    r.city_id = f[c_city];
    r.country_id = f[c_country];
    r.booker_country = f[c_booker];
    r.device_class = f[c_device];
    r.checkin = *ci;
    r.checkout = *co;
    auto [it, inserted] = trip_index.try_emplace(r.trip_id, trips.size());
    if (inserted) {
      Trip t;
      t.trip_id = r.trip_id;
      t.user_id = r.user_id;
      trips.push_back(std::move(t));
    }
    trips[it->second].reservations.push_back(std::move(r));
    ++rep.rows_kept;
  }

  if (rep.rows_total > 0 &&
      static_cast<double>(rep.malformed.size()) >
          max_bad_ratio * static_cast<double>(rep.rows_total)) {
    std::ostringstream msg;
    msg << rep.malformed.size() << "/" << rep.rows_total
        << " malformed rows (first: line " << rep.malformed.front().line_no
        << ", " << rep.malformed.front().reason << ")";
    throw MalformedInput(msg.str());
  }

  for (auto& t : trips) {
    std::stable_sort(t.reservations.begin(), t.reservations.end(),
                     [](const Reservation& a, const Reservation& b) {
                       return a.checkin < b.checkin;
                     });
    for (std::size_t i = 0; i < t.reservations.size(); ++i)
      t.reservations[i].step_index = static_cast<int>(i);
  }

  TripDataset ds;
  ds.trips = std::move(trips);
  ds.provenance = Provenance::loaded;
  return ds;
}

std::string trips_to_csv(const TripDataset& ds, const ColumnSchema& schema) {
  const char d = schema.delimiter;
  std::ostringstream out;
  out << schema.user_id << d << schema.trip_id << d << schema.city_id << d
      << schema.country_id << d << schema.booker_country << d
      << schema.device_class << d << schema.checkin << d << schema.checkout
      << "\n";
  for (const auto& t : ds.trips)
    for (const auto& r : t.reservations)
      out << csv_escape(r.user_id, d) << d << csv_escape(r.trip_id, d) << d
          << csv_escape(r.city_id, d) << d << csv_escape(r.country_id, d) << d
          << csv_escape(r.booker_country, d) << d
          << csv_escape(r.device_class, d) << d << r.checkin.to_string() << d
          << r.checkout.to_string() << "\n";
  return out.str();
}

void save_trips(const TripDataset& ds, const std::string& path,
                const ColumnSchema& schema) {
  write_text_file(path, trips_to_csv(ds, schema));
}

}  // namespace reclab::data
