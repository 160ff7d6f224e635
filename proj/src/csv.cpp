#include "hbvm/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace hbvm {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string batch_to_csv(const ObservationBatch& batch) {
  std::ostringstream out;
  out << "index";
  for (int c = 0; c < batch.p(); ++c) out << ",x_" << (c + 1);
  out << "\n";
  for (int r = 0; r < batch.n(); ++r) {
    out << batch.index[r];
    for (int c = 0; c < batch.p(); ++c) out << "," << format_double(batch.x(r, c));
    out << "\n";
  }
  return out.str();
}

ObservationBatch batch_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw NumericalError("batch_from_csv: empty file");
  int p = 0;
  for (char ch : line)
    if (ch == ',') ++p;
  std::vector<std::vector<double>> rows;
  std::vector<int> index;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tok;
    std::getline(ls, tok, ',');
    index.push_back(std::stoi(tok));
    std::vector<double> row;
    while (std::getline(ls, tok, ',')) row.push_back(std::stod(tok));
    if (static_cast<int>(row.size()) != p)
      throw NumericalError("batch_from_csv: ragged row");
    rows.push_back(std::move(row));
  }
  ObservationBatch batch;
  batch.x.resize(rows.size(), p);
  batch.index = std::move(index);
  for (size_t r = 0; r < rows.size(); ++r)
    for (int c = 0; c < p; ++c) batch.x(r, c) = rows[r][c];
  batch.validate();
  return batch;
}

std::string posterior_to_csv(const PosteriorGrid& pg) {
  std::ostringstream out;
  for (int a = 0; a < pg.grid.dim(); ++a) out << (a ? "," : "") << "theta_" << (a + 1);
  out << ",log_unnorm,density\n";
  for (long k = 0; k < pg.grid.size(); ++k) {
    const Vector node = pg.grid.node(k);
    for (int a = 0; a < pg.grid.dim(); ++a) out << (a ? "," : "") << format_double(node[a]);
    out << "," << format_double(pg.log_unnorm[k]) << "," << format_double(pg.density[k]) << "\n";
  }
  return out.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw NumericalError("write_file: cannot open " + path);
  f << content;
  if (!f) throw NumericalError("write_file: write failed for " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw NumericalError("read_file: cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace hbvm
