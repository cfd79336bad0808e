#include "covdiff/channel_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

#include "covdiff/format.hpp"

namespace covdiff::io {

namespace {

struct LineReader {
  explicit LineReader(const std::filesystem::path& p) : path(p), in(p) {
    if (!in) throw std::runtime_error("cannot open " + p.string());
  }

  std::filesystem::path path;
  std::ifstream in;
  int line_no = 0;

  std::runtime_error error(const std::string& what) const {
    return std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + what);
  }

  std::string next() {
    std::string line;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty()) return line;
    }
    throw error("unexpected end of file");
  }

  // Parses "<key> <fields...>" and returns a stream over the fields.
  std::istringstream fields(const std::string& key) {
    std::istringstream stream(next());
    std::string found;
    stream >> found;
    if (found != key) throw error("expected '" + key + "', found '" + found + "'");
    return stream;
  }

  long expect_int(const std::string& key) {
    auto stream = fields(key);
    long value = 0;
    if (!(stream >> value)) throw error("missing integer after '" + key + "'");
    return value;
  }

  double expect_double(const std::string& key) {
    auto stream = fields(key);
    double value = 0.0;
    if (!(stream >> value)) throw error("missing number after '" + key + "'");
    return value;
  }
};

BoxLattice read_lattice(LineReader& reader) {
  const long dim = reader.expect_int("dim");
  const long n_max = reader.expect_int("n_max");
  const double box_length = reader.expect_double("box_length");
  const double hbar = reader.expect_double("hbar");
  return BoxLattice(static_cast<int>(dim), static_cast<int>(n_max), box_length, hbar);
}

void write_lattice(std::ostream& out, const BoxLattice& lattice) {
  out << "dim " << lattice.dim() << '\n';
  out << "n_max " << lattice.n_max() << '\n';
  out << "box_length " << format_float(lattice.box_length()) << '\n';
  out << "hbar " << format_float(lattice.hbar()) << '\n';
}

MomentumIndex read_index(LineReader& reader, std::istringstream& stream, int dim) {
  MomentumIndex n = MomentumIndex::zero(dim);
  for (int a = 0; a < dim; ++a) {
    if (!(stream >> n[a])) throw reader.error("missing index component");
  }
  return n;
}

// Body shared by the block and term forms: a header line
// "<keyword> <label> <q components> <count>" followed by count entry lines
// "<n components> <re> <im>".
void read_entries(LineReader& reader, const BoxLattice& lattice, const std::string& keyword,
                  int& label, MomentumIndex& transfer, Eigen::VectorXcd& values) {
  auto header = reader.fields(keyword);
  long count = 0;
  if (!(header >> label)) throw reader.error("missing label after '" + keyword + "'");
  transfer = read_index(reader, header, lattice.dim());
  if (!(header >> count) || count < 0) throw reader.error("missing entry count");
  if (!lattice.valid_transfer(transfer)) {
    throw reader.error("transfer " + to_string(transfer) + " outside the transfer window");
  }
  values = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(lattice.basis_size()));
  for (long e = 0; e < count; ++e) {
    std::istringstream entry(reader.next());
    const MomentumIndex n = read_index(reader, entry, lattice.dim());
    double re = 0.0;
    double im = 0.0;
    if (!(entry >> re >> im)) throw reader.error("missing gain value");
    if (!lattice.contains(n)) throw reader.error("mode " + to_string(n) + " outside the window");
    values(static_cast<Eigen::Index>(lattice.flat_index(n))) = Complex(re, im);
  }
}

void write_entries(std::ostream& out, const BoxLattice& lattice, const std::string& keyword,
                   int label, const MomentumIndex& transfer, const Eigen::VectorXcd& values) {
  long count = 0;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values(i) != Complex(0.0, 0.0)) ++count;
  }
  out << keyword << ' ' << label;
  for (int a = 0; a < lattice.dim(); ++a) out << ' ' << transfer[a];
  out << ' ' << count << '\n';
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const Complex v = values(i);
    if (v == Complex(0.0, 0.0)) continue;
    const MomentumIndex n = lattice.unflatten(static_cast<std::size_t>(i));
    for (int a = 0; a < lattice.dim(); ++a) out << n[a] << ' ';
    out << format_float(v.real()) << ' ' << format_float(v.imag()) << '\n';
  }
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

RawChannelData parse_channel(const std::filesystem::path& path) {
  LineReader reader(path);
  reader.expect_int("channel-format");
  BoxLattice lattice = read_lattice(reader);
  const long blocks = reader.expect_int("blocks");
  if (blocks < 0) throw reader.error("negative block count");
  std::vector<TransferBlock> parsed;
  parsed.reserve(static_cast<std::size_t>(blocks));
  for (long b = 0; b < blocks; ++b) {
    TransferBlock block;
    read_entries(reader, lattice, "block", block.kraus_id, block.transfer, block.gains);
    parsed.push_back(std::move(block));
  }
  return RawChannelData{std::move(lattice), std::move(parsed)};
}

}  // namespace

void save_channel(const CovariantChannel& channel, const std::filesystem::path& path) {
  std::ofstream out = open_output(path);
  out << "channel-format 1\n";
  write_lattice(out, channel.lattice());
  out << "blocks " << channel.blocks().size() << '\n';
  for (const TransferBlock& block : channel.blocks()) {
    write_entries(out, channel.lattice(), "block", block.kraus_id, block.transfer, block.gains);
  }
}

CovariantChannel load_channel(const std::filesystem::path& path) {
  RawChannelData raw = parse_channel(path);
  return CovariantChannel(std::move(raw.lattice), std::move(raw.blocks));
}

RawChannelData load_channel_raw(const std::filesystem::path& path) {
  return parse_channel(path);
}

void save_density(const DensityMatrix& rho, const std::filesystem::path& path) {
  std::ofstream out = open_output(path);
  out << "density-format 1\n";
  write_lattice(out, rho.lattice());
  const Eigen::MatrixXcd& m = rho.matrix();
  out << "matrix " << m.rows() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ' ';
      out << format_float(m(i, j).real()) << ' ' << format_float(m(i, j).imag());
    }
    out << '\n';
  }
}

DensityMatrix load_density(const std::filesystem::path& path, ValidationLimits limits) {
  LineReader reader(path);
  reader.expect_int("density-format");
  BoxLattice lattice = read_lattice(reader);
  const long size = reader.expect_int("matrix");
  if (size != static_cast<long>(lattice.basis_size())) {
    throw reader.error("matrix size does not match the lattice");
  }
  Eigen::MatrixXcd m(size, size);
  for (long i = 0; i < size; ++i) {
    std::istringstream row(reader.next());
    for (long j = 0; j < size; ++j) {
      double re = 0.0;
      double im = 0.0;
      if (!(row >> re >> im)) throw reader.error("missing matrix entry");
      m(i, j) = Complex(re, im);
    }
  }
  return DensityMatrix(std::move(lattice), std::move(m), limits);
}

void save_generator(const LindbladGenerator& gen, const std::filesystem::path& path) {
  std::ofstream out = open_output(path);
  out << "generator-format 1\n";
  write_lattice(out, gen.lattice());
  out << "terms " << gen.terms().size() << '\n';
  for (const GeneratorTerm& term : gen.terms()) {
    write_entries(out, gen.lattice(), "term", term.label, term.transfer, term.values);
  }
  if (gen.hamiltonian().has_value()) {
    const Eigen::MatrixXcd& h = *gen.hamiltonian();
    out << "hamiltonian 1\n";
    for (Eigen::Index i = 0; i < h.rows(); ++i) {
      for (Eigen::Index j = 0; j < h.cols(); ++j) {
        if (j > 0) out << ' ';
        out << format_float(h(i, j).real()) << ' ' << format_float(h(i, j).imag());
      }
      out << '\n';
    }
  } else {
    out << "hamiltonian 0\n";
  }
}

LindbladGenerator load_generator(const std::filesystem::path& path) {
  LineReader reader(path);
  reader.expect_int("generator-format");
  BoxLattice lattice = read_lattice(reader);
  const long terms = reader.expect_int("terms");
  if (terms < 0) throw reader.error("negative term count");
  std::vector<GeneratorTerm> parsed;
  parsed.reserve(static_cast<std::size_t>(terms));
  for (long t = 0; t < terms; ++t) {
    GeneratorTerm term;
    read_entries(reader, lattice, "term", term.label, term.transfer, term.values);
    parsed.push_back(std::move(term));
  }
  std::optional<Eigen::MatrixXcd> hamiltonian;
  if (reader.expect_int("hamiltonian") == 1) {
    const auto size = static_cast<long>(lattice.basis_size());
    Eigen::MatrixXcd h(size, size);
    for (long i = 0; i < size; ++i) {
      std::istringstream row(reader.next());
      for (long j = 0; j < size; ++j) {
        double re = 0.0;
        double im = 0.0;
        if (!(row >> re >> im)) throw reader.error("missing Hamiltonian entry");
        h(i, j) = Complex(re, im);
      }
    }
    hamiltonian = std::move(h);
  }
  return LindbladGenerator(std::move(lattice), std::move(parsed), std::move(hamiltonian));
}

}  // namespace covdiff::io
