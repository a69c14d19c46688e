#include "latentic/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "latentic/errors.hpp"

namespace latentic {

namespace {

void validate_spec(const GeneratorSpec& spec) {
  if (spec.n_symbols < 2 || spec.coarse_dim < 1 || spec.coarse_dim >= spec.dim ||
      spec.frames_per_symbol < 1)
    throw std::invalid_argument("generator spec: bad sizes");
  if (static_cast<int>(spec.embedding.size()) != spec.n_symbols)
    throw std::invalid_argument("generator spec: embedding count mismatch");
  if (spec.transitions.rows != spec.n_symbols || spec.transitions.cols != spec.n_symbols)
    throw std::invalid_argument("generator spec: transition matrix shape mismatch");
  for (int r = 0; r < spec.transitions.rows; ++r) {
    double s = 0.0;
    for (int c = 0; c < spec.transitions.cols; ++c) {
      const double p = spec.transitions.at(r, c);
      if (p < 0.0) throw std::invalid_argument("generator spec: negative transition probability");
      s += p;
    }
    if (std::abs(s - 1.0) > 1e-9)
      throw std::invalid_argument("generator spec: transition row does not sum to 1");
  }
  for (int a = 0; a < spec.n_symbols; ++a)
    for (int b = a + 1; b < spec.n_symbols; ++b) {
      double d2 = 0.0;
      for (int c = 0; c < spec.coarse_dim; ++c) {
        const double diff = spec.embedding[a][c] - spec.embedding[b][c];
        d2 += diff * diff;
      }
      if (std::sqrt(d2) < 4.0 * spec.fine_amp)
        throw std::invalid_argument("generator spec: embedding separation below 4*fine_amp");
    }
}

// Per-timbre fixed orthogonal mixing (Gram-Schmidt on a Gaussian matrix).
Mat timbre_mixing(const GeneratorSpec& spec, int timbre) {
  const int f = spec.fine_dim();
  Rng rng(spec.texture_seed, Rng::key(0x7469u, static_cast<uint64_t>(timbre)));
  Mat q(f, f);
  for (int r = 0; r < f; ++r) {
    Vec row(static_cast<size_t>(f));
    for (auto& v : row) v = rng.normal();
    for (int p = 0; p < r; ++p) {
      double proj = 0.0;
      for (int c = 0; c < f; ++c) proj += row[c] * q.at(p, c);
      for (int c = 0; c < f; ++c) row[c] -= proj * q.at(p, c);
    }
    double nrm = 0.0;
    for (double v : row) nrm += v * v;
    nrm = std::sqrt(nrm);
    for (int c = 0; c < f; ++c) q.at(r, c) = row[c] / nrm;
  }
  return q;
}

// Per-channel AR coefficients, log-spaced so the mixed texture has a spread
// conditional covariance.
Vec ar_coefficients(int f) {
  Vec rho(static_cast<size_t>(f));
  for (int i = 0; i < f; ++i)
    rho[i] = 0.5 * std::pow(0.95 / 0.5, f > 1 ? static_cast<double>(i) / (f - 1) : 0.0);
  return rho;
}

struct SymbolPath {
  std::vector<int> symbols;
  std::vector<double> ic_bits;
};

SymbolPath sample_path(const Mat& transitions, int n_symbols, int length, Rng& rng) {
  SymbolPath path;
  int prev = static_cast<int>(rng.below(static_cast<uint64_t>(n_symbols)));
  path.symbols.push_back(prev);
  path.ic_bits.push_back(std::log2(static_cast<double>(n_symbols)));  // uniform start
  for (int i = 1; i < length; ++i) {
    const double u = rng.uniform();
    double acc = 0.0;
    int next = n_symbols - 1;
    for (int s = 0; s < n_symbols; ++s) {
      acc += transitions.at(prev, s);
      if (u < acc) {
        next = s;
        break;
      }
    }
    path.symbols.push_back(next);
    path.ic_bits.push_back(-std::log2(transitions.at(prev, next)));
    prev = next;
  }
  return path;
}

// Renders a symbol path into frames under one timbre; the AR texture state
// persists across the whole call.
void render_path(const GeneratorSpec& spec, const SymbolPath& path,
                 const std::vector<Vec>& palette, int timbre, Rng& rng,
                 LatentSequence& out, Annotations& ann) {
  const int f = spec.fine_dim();
  const Mat q = timbre_mixing(spec, timbre);
  const Vec rho = ar_coefficients(f);
  Vec state(static_cast<size_t>(f));
  for (auto& v : state) v = rng.normal();  // stationary start
  for (size_t e = 0; e < path.symbols.size(); ++e) {
    const int sym = path.symbols[e];
    ann.onset_frames.push_back(static_cast<int>(out.frames.size()));
    ann.symbol_ic_bits.push_back(path.ic_bits[e]);
    for (int rep = 0; rep < spec.frames_per_symbol; ++rep) {
      Vec frame(static_cast<size_t>(spec.dim), 0.0);
      for (int c = 0; c < spec.coarse_dim; ++c)
        frame[c] = palette[sym][c] + spec.coarse_jitter * rng.normal();
      for (int i = 0; i < f; ++i)
        state[i] = rho[i] * state[i] + std::sqrt(1.0 - rho[i] * rho[i]) * rng.normal();
      for (int r = 0; r < f; ++r) {
        double acc = 0.0;
        for (int c = 0; c < f; ++c) acc += q.at(r, c) * state[c];
        frame[spec.coarse_dim + r] = spec.fine_amp * acc;
      }
      // quantize to f32 so dataset files round-trip bit-exactly
      for (auto& v : frame) v = static_cast<double>(static_cast<float>(v));
      out.frames.push_back(std::move(frame));
      ann.frame_symbols.push_back(sym);
    }
  }
}

void write_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

Mat random_transitions(int n, Rng& rng) {
  Mat m(n, n);
  for (int r = 0; r < n; ++r) {
    double sum = 0.0;
    for (int c = 0; c < n; ++c) {
      m.at(r, c) = -std::log(rng.uniform_pos());
      sum += m.at(r, c);
    }
    // flat-Dirichlet row with a 5% uniform floor against vanishing probabilities
    for (int c = 0; c < n; ++c)
      m.at(r, c) = 0.95 * m.at(r, c) / sum + 0.05 / static_cast<double>(n);
  }
  return m;
}

GeneratorSpec make_generator_spec(Rng rng) {
  GeneratorSpec spec;
  spec.texture_seed = Rng::key(rng.seed(), rng.stream());
  if (spec.n_symbols > (1 << spec.coarse_dim))
    throw std::invalid_argument("make_generator_spec: too many symbols for hypercube corners");
  for (int s = 0; s < spec.n_symbols; ++s) {
    Vec e(static_cast<size_t>(spec.coarse_dim));
    for (int c = 0; c < spec.coarse_dim; ++c) e[c] = (s >> c) & 1 ? 0.5 : -0.5;
    spec.embedding.push_back(std::move(e));
  }
  spec.transitions = random_transitions(spec.n_symbols, rng);
  return spec;
}

LatentSequence gen_pitch_timbre(const GeneratorSpec& spec, int length_symbols, int timbre,
                                Rng rng) {
  validate_spec(spec);
  if (length_symbols < 2)
    throw std::invalid_argument("gen_pitch_timbre: need at least 2 symbols");

  // the path stream never sees the timbre, so note material matches across timbres
  Rng path_rng(rng.seed(), Rng::key(rng.stream(), 1));
  Rng render_rng(rng.seed(), Rng::key(rng.stream(), 1000 + static_cast<uint64_t>(timbre)));

  SymbolPath path = sample_path(spec.transitions, spec.n_symbols, length_symbols, path_rng);

  LatentSequence seq;
  seq.frame_rate = spec.frame_rate;
  Annotations ann;
  ann.timbre_id = timbre;
  ann.material_id = Rng::key(Rng::key(rng.seed(), rng.stream()),
                             static_cast<uint64_t>(length_symbols));
  render_path(spec, path, spec.embedding, timbre, render_rng, seq, ann);
  seq.annotations = std::move(ann);
  seq.id = Rng::key(seq.annotations->material_id, static_cast<uint64_t>(timbre));
  validate_sequence(seq);
  return seq;
}

LatentSequence gen_segmented(const GeneratorSpec& spec, int n_sections, Rng rng) {
  validate_spec(spec);
  if (n_sections < 2) throw std::invalid_argument("gen_segmented: need at least 2 sections");

  Rng section_rng(rng.seed(), Rng::key(rng.stream(), 2));
  Rng render_rng(rng.seed(), Rng::key(rng.stream(), 3));
  const int timbre = static_cast<int>(section_rng.below(4));

  LatentSequence seq;
  seq.frame_rate = spec.frame_rate;
  Annotations ann;
  ann.timbre_id = timbre;
  ann.material_id = Rng::key(rng.seed(), Rng::key(rng.stream(), 4));

  for (int sec = 0; sec < n_sections; ++sec) {
    if (sec > 0)
      ann.boundary_times.push_back(static_cast<double>(seq.frames.size()) / spec.frame_rate);
    Mat transitions = random_transitions(spec.n_symbols, section_rng);
    std::vector<Vec> palette = spec.embedding;
    for (size_t i = palette.size(); i > 1; --i)
      std::swap(palette[i - 1], palette[section_rng.below(i)]);
    SymbolPath path =
        sample_path(transitions, spec.n_symbols, spec.symbols_per_section, section_rng);
    render_path(spec, path, palette, timbre, render_rng, seq, ann);
  }
  seq.annotations = std::move(ann);
  seq.id = Rng::key(seq.annotations->material_id, 0x5345u);
  validate_sequence(seq);
  return seq;
}

void save_dataset(const std::vector<LatentSequence>& sequences,
                  const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  char name[32];
  for (size_t i = 0; i < sequences.size(); ++i) {
    const LatentSequence& seq = sequences[i];
    std::snprintf(name, sizeof(name), "seq_%05zu", i);
    nlohmann::json meta;
    meta["format_version"] = 1;
    meta["id"] = seq.id;
    meta["frame_rate"] = seq.frame_rate;
    meta["shape"] = {seq.length(), seq.dim()};
    if (seq.annotations) {
      const Annotations& a = *seq.annotations;
      meta["annotations"] = {
          {"frame_symbols", a.frame_symbols},   {"onset_frames", a.onset_frames},
          {"symbol_ic_bits", a.symbol_ic_bits}, {"boundary_times", a.boundary_times},
          {"timbre_id", a.timbre_id},           {"material_id", a.material_id},
      };
    } else {
      meta["annotations"] = nullptr;
    }
    std::ofstream js(dir / (std::string(name) + ".json"), std::ios::trunc);
    js << meta.dump(2) << "\n";
    if (!js) throw std::runtime_error("save_dataset: cannot write sidecar");

    std::ofstream fs(dir / (std::string(name) + ".f32"), std::ios::binary | std::ios::trunc);
    for (const Vec& frame : seq.frames)
      for (double v : frame) {
        const float f = static_cast<float>(v);
        uint32_t bits;
        std::memcpy(&bits, &f, 4);
        write_u32(fs, bits);
      }
    if (!fs) throw std::runtime_error("save_dataset: cannot write frames");
  }
}

std::vector<LatentSequence> load_dataset(const std::filesystem::path& dir) {
  std::vector<LatentSequence> out;
  if (!std::filesystem::exists(dir)) return out;
  std::vector<std::filesystem::path> sidecars;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.path().extension() == ".json" &&
        entry.path().filename().string().rfind("seq_", 0) == 0)
      sidecars.push_back(entry.path());
  std::sort(sidecars.begin(), sidecars.end());

  for (const auto& sidecar : sidecars) {
    nlohmann::json meta;
    try {
      std::ifstream js(sidecar);
      js >> meta;
    } catch (const std::exception& e) {
      throw CorruptDataset("load_dataset: bad sidecar " + sidecar.string() + ": " + e.what());
    }
    LatentSequence seq;
    int T, d;
    try {
      seq.id = meta.at("id").get<uint64_t>();
      seq.frame_rate = meta.at("frame_rate").get<double>();
      T = meta.at("shape").at(0).get<int>();
      d = meta.at("shape").at(1).get<int>();
      if (!meta.at("annotations").is_null()) {
        const auto& a = meta.at("annotations");
        Annotations ann;
        ann.frame_symbols = a.at("frame_symbols").get<std::vector<int>>();
        ann.onset_frames = a.at("onset_frames").get<std::vector<int>>();
        ann.symbol_ic_bits = a.at("symbol_ic_bits").get<std::vector<double>>();
        ann.boundary_times = a.at("boundary_times").get<std::vector<double>>();
        ann.timbre_id = a.at("timbre_id").get<int>();
        ann.material_id = a.at("material_id").get<uint64_t>();
        seq.annotations = std::move(ann);
      }
    } catch (const nlohmann::json::exception& e) {
      throw CorruptDataset("load_dataset: malformed sidecar " + sidecar.string() + ": " +
                           e.what());
    }
    if (T < 1 || d < 1) throw CorruptDataset("load_dataset: bad shape in " + sidecar.string());

    std::filesystem::path fpath = sidecar;
    fpath.replace_extension(".f32");
    std::ifstream fs(fpath, std::ios::binary);
    if (!fs) throw CorruptDataset("load_dataset: missing frame file " + fpath.string());
    fs.seekg(0, std::ios::end);
    const auto bytes = fs.tellg();
    if (bytes != static_cast<std::streamoff>(T) * d * 4)
      throw CorruptDataset("load_dataset: truncated frame file " + fpath.string());
    fs.seekg(0);
    seq.frames.assign(static_cast<size_t>(T), Vec(static_cast<size_t>(d)));
    for (auto& frame : seq.frames)
      for (double& v : frame) {
        unsigned char b[4];
        fs.read(reinterpret_cast<char*>(b), 4);
        if (!fs) throw CorruptDataset("load_dataset: read failure " + fpath.string());
        uint32_t bits = 0;
        for (int j = 0; j < 4; ++j) bits |= static_cast<uint32_t>(b[j]) << (8 * j);
        float f;
        std::memcpy(&f, &bits, 4);
        v = static_cast<double>(f);
      }
    out.push_back(std::move(seq));
  }
  return out;
}

}  // namespace latentic
