#include "tmla/codec.hpp"

#include <sys/select.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <csignal>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <vector>

#include "tmla/image_io.hpp"
#include "tmla/parallel.hpp"

namespace tmla {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// 8x8 (or block x block) orthonormal DCT-II basis, cached per size.
struct DctBasis {
  int n;
  std::vector<double> c;  // c[u*n + i]
  explicit DctBasis(int n_) : n(n_), c(static_cast<std::size_t>(n_) * n_) {
    const double pi = 3.14159265358979323846264338327950288;
    for (int u = 0; u < n; ++u) {
      const double cu = u == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
      for (int i = 0; i < n; ++i)
        c[static_cast<std::size_t>(u) * n + i] = cu * std::cos((2 * i + 1) * u * pi / (2.0 * n));
    }
  }
};

const DctBasis& dct_basis(int n) {
  static std::map<int, DctBasis> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, DctBasis(n)).first;
  return it->second;
}

// y = C x C^T
void dct2(const DctBasis& B, const double* x, double* y) {
  const int n = B.n;
  std::vector<double> t(static_cast<std::size_t>(n) * n, 0.0);
  for (int u = 0; u < n; ++u)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += B.c[static_cast<std::size_t>(u) * n + i] * x[i * n + j];
      t[static_cast<std::size_t>(u) * n + j] = s;
    }
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v) {
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += t[static_cast<std::size_t>(u) * n + j] * B.c[static_cast<std::size_t>(v) * n + j];
      y[u * n + v] = s;
    }
}

// x = C^T y C
void idct2(const DctBasis& B, const double* y, double* x) {
  const int n = B.n;
  std::vector<double> t(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int v = 0; v < n; ++v) {
      double s = 0.0;
      for (int u = 0; u < n; ++u) s += B.c[static_cast<std::size_t>(u) * n + i] * y[u * n + v];
      t[static_cast<std::size_t>(i) * n + v] = s;
    }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int v = 0; v < n; ++v) s += t[static_cast<std::size_t>(i) * n + v] * B.c[static_cast<std::size_t>(v) * n + j];
      x[i * n + j] = s;
    }
}

bool is_hf(int u, int v, int n) { return u + v >= n; }

int hf_count(int n) {
  int k = 0;
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v)
      if (is_hf(u, v, n)) ++k;
  return k;
}

Image pad_to_blocks(const Image& x, int block) {
  const int ph = (x.height + block - 1) / block * block;
  const int pw = (x.width + block - 1) / block * block;
  if (ph == x.height && pw == x.width) return x;
  Image out(ph, pw, x.channels);
  for (int c = 0; c < x.channels; ++c)
    for (int y = 0; y < ph; ++y)
      for (int xx = 0; xx < pw; ++xx)
        out.at(c, y, xx) = x.at(c, std::min(y, x.height - 1), std::min(xx, x.width - 1));
  return out;
}

struct BlockRef {
  int c, by, bx;
};

std::vector<BlockRef> block_list(const Image& padded, int block) {
  std::vector<BlockRef> blocks;
  for (int c = 0; c < padded.channels; ++c)
    for (int by = 0; by < padded.height / block; ++by)
      for (int bx = 0; bx < padded.width / block; ++bx) blocks.push_back({c, by, bx});
  return blocks;
}

}  // namespace

double softround(double z) { return z - std::sin(kTwoPi * z) / kTwoPi; }
double softround_deriv(double z) { return 1.0 - std::cos(kTwoPi * z); }

void SurrogateCodecParams::validate() const {
  if (block < 2) throw std::invalid_argument("surrogate codec: block must be >= 2");
  if (!(q_fine > 0.0) || !(q_coarse > q_fine))
    throw std::invalid_argument("surrogate codec: need 0 < q_fine < q_coarse");
  if (!(sharpness > 0.0)) throw std::invalid_argument("surrogate codec: sharpness must be > 0");
}

std::string SurrogateCodecParams::descriptor() const {
  std::ostringstream os;
  os << "surrogate:b" << block << ":qf" << q_fine << ":qc" << q_coarse << ":tau" << tau << ":s"
     << sharpness << ":seed" << seed;
  return os.str();
}

std::pair<Image, double> surrogate_forward(const Image& x, const SurrogateCodecParams& p) {
  p.validate();
  const Image padded = pad_to_blocks(x, p.block);
  const DctBasis& B = dct_basis(p.block);
  const int nb = p.block * p.block;
  const int nhf = hf_count(p.block);
  const auto blocks = block_list(padded, p.block);

  Image recon_padded(padded.height, padded.width, padded.channels);
  std::vector<long long> symbols(static_cast<std::size_t>(blocks.size()) * nb);

  par::for_n(static_cast<long long>(blocks.size()), [&](long long bi) {
    const BlockRef& br = blocks[static_cast<std::size_t>(bi)];
    std::vector<double> blk(static_cast<std::size_t>(nb)), y(static_cast<std::size_t>(nb)),
        yq(static_cast<std::size_t>(nb)), rec(static_cast<std::size_t>(nb));
    for (int i = 0; i < p.block; ++i)
      for (int j = 0; j < p.block; ++j)
        blk[static_cast<std::size_t>(i) * p.block + j] =
            padded.at(br.c, br.by * p.block + i, br.bx * p.block + j);

    dct2(B, blk.data(), y.data());

    double act = 0.0;
    for (int u = 0; u < p.block; ++u)
      for (int v = 0; v < p.block; ++v)
        if (is_hf(u, v, p.block)) act += std::abs(y[static_cast<std::size_t>(u) * p.block + v]);
    act /= nhf;

    const double g = logistic(p.sharpness * (act - p.tau));
    const double q = p.q_fine + g * (p.q_coarse - p.q_fine);

    for (int i = 0; i < nb; ++i) {
      const double z = y[static_cast<std::size_t>(i)] / q;
      yq[static_cast<std::size_t>(i)] = q * softround(z);
      symbols[static_cast<std::size_t>(bi) * nb + i] = std::llround(z);
    }

    idct2(B, yq.data(), rec.data());
    for (int i = 0; i < p.block; ++i)
      for (int j = 0; j < p.block; ++j) {
        double v = rec[static_cast<std::size_t>(i) * p.block + j];
        recon_padded.at(br.c, br.by * p.block + i, br.bx * p.block + j) =
            v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
      }
  });

  // entropy of the hard symbol histogram, bits per pixel
  std::map<long long, long long> hist;
  for (long long s : symbols) ++hist[s];
  const double total = static_cast<double>(symbols.size());
  double entropy = 0.0;
  for (const auto& [sym, count] : hist) {
    const double prob = count / total;
    entropy -= prob * std::log2(prob);
  }
  const double bpp = entropy * total /
                     (static_cast<double>(padded.height) * static_cast<double>(padded.width));

  if (padded.height == x.height && padded.width == x.width) return {std::move(recon_padded), bpp};
  Image recon(x.height, x.width, x.channels);
  for (int c = 0; c < x.channels; ++c)
    for (int y = 0; y < x.height; ++y)
      for (int xx = 0; xx < x.width; ++xx) recon.at(c, y, xx) = recon_padded.at(c, y, xx);
  return {std::move(recon), bpp};
}

Image surrogate_vjp(const Image& x, const Image& cotangent, const SurrogateCodecParams& p) {
  p.validate();
  require_same_shape(x, cotangent, "surrogate_vjp");
  const Image padded = pad_to_blocks(x, p.block);
  const DctBasis& B = dct_basis(p.block);
  const int nb = p.block * p.block;
  const int nhf = hf_count(p.block);
  const auto blocks = block_list(padded, p.block);

  Image grad_padded(padded.height, padded.width, padded.channels);

  par::for_n(static_cast<long long>(blocks.size()), [&](long long bi) {
    const BlockRef& br = blocks[static_cast<std::size_t>(bi)];
    std::vector<double> blk(static_cast<std::size_t>(nb)), y(static_cast<std::size_t>(nb)),
        cot_blk(static_cast<std::size_t>(nb)), rec(static_cast<std::size_t>(nb)),
        yq(static_cast<std::size_t>(nb)), cot_yq(static_cast<std::size_t>(nb)),
        cot_y(static_cast<std::size_t>(nb)), gx(static_cast<std::size_t>(nb));

    for (int i = 0; i < p.block; ++i)
      for (int j = 0; j < p.block; ++j) {
        const int yy = br.by * p.block + i, xx = br.bx * p.block + j;
        blk[static_cast<std::size_t>(i) * p.block + j] = padded.at(br.c, yy, xx);
        cot_blk[static_cast<std::size_t>(i) * p.block + j] =
            (yy < x.height && xx < x.width) ? cotangent.at(br.c, yy, xx) : 0.0;
      }

    dct2(B, blk.data(), y.data());

    double act = 0.0;
    for (int u = 0; u < p.block; ++u)
      for (int v = 0; v < p.block; ++v)
        if (is_hf(u, v, p.block)) act += std::abs(y[static_cast<std::size_t>(u) * p.block + v]);
    act /= nhf;

    const double g = logistic(p.sharpness * (act - p.tau));
    const double q = p.q_fine + g * (p.q_coarse - p.q_fine);

    // redo forward pieces needed for the clip subgradient
    for (int i = 0; i < nb; ++i) yq[static_cast<std::size_t>(i)] = q * softround(y[static_cast<std::size_t>(i)] / q);
    idct2(B, yq.data(), rec.data());

    for (int i = 0; i < nb; ++i) cot_blk[static_cast<std::size_t>(i)] *= clip01_subgrad(rec[static_cast<std::size_t>(i)]);

    // adjoint of idct2 is dct2
    dct2(B, cot_blk.data(), cot_yq.data());

    // quantizer backward: yq_i = q*r(y_i/q), q = qf + g*(qc-qf),
    //   d yq_i / d y_i = r'(y_i/q)
    //   d yq_i / d q   = r(y_i/q) - (y_i/q) r'(y_i/q)
    //   d q / d y_j    = (qc-qf) * s * g(1-g) * sign(y_j)/nhf   (HF j only)
    double wq = 0.0;
    for (int i = 0; i < nb; ++i) {
      const double z = y[static_cast<std::size_t>(i)] / q;
      const double rp = softround_deriv(z);
      cot_y[static_cast<std::size_t>(i)] = cot_yq[static_cast<std::size_t>(i)] * rp;
      wq += cot_yq[static_cast<std::size_t>(i)] * (softround(z) - z * rp);
    }
    // |y| subgradient taken as 0 at the kink; DCT rounding noise (~1e-16 on
    // flat blocks) must not pick a side, the factor wq can be enormous
    const double dq_da = (p.q_coarse - p.q_fine) * p.sharpness * g * (1.0 - g);
    constexpr double kKink = 1e-12;
    for (int u = 0; u < p.block; ++u)
      for (int v = 0; v < p.block; ++v)
        if (is_hf(u, v, p.block)) {
          const std::size_t idx = static_cast<std::size_t>(u) * p.block + v;
          const double sign_y = y[idx] > kKink ? 1.0 : (y[idx] < -kKink ? -1.0 : 0.0);
          cot_y[idx] += wq * dq_da * sign_y / nhf;
        }

    // adjoint of dct2 is idct2
    idct2(B, cot_y.data(), gx.data());
    for (int i = 0; i < p.block; ++i)
      for (int j = 0; j < p.block; ++j)
        grad_padded.at(br.c, br.by * p.block + i, br.bx * p.block + j) =
            gx[static_cast<std::size_t>(i) * p.block + j];
  });

  if (padded.height == x.height && padded.width == x.width) return grad_padded;

  // fold the replicated-edge cotangent back onto its source pixels
  Image grad(x.height, x.width, x.channels);
  for (int c = 0; c < x.channels; ++c)
    for (int y = 0; y < padded.height; ++y)
      for (int xx = 0; xx < padded.width; ++xx)
        grad.at(c, std::min(y, x.height - 1), std::min(xx, x.width - 1)) +=
            grad_padded.at(c, y, xx);
  return grad;
}

CodecContract make_surrogate_codec(const SurrogateCodecParams& p) {
  p.validate();
  CodecContract c;
  c.descriptor = p.descriptor();
  c.forward = [p](const Image& x) { return surrogate_forward(x, p); };
  c.vjp = [p](const Image& x, const Image& cot) { return surrogate_vjp(x, cot, p); };
  return c;
}

std::pair<Image, double> external_codec_eval(const Image& x, const std::string& command,
                                             int timeout_ms) {
  namespace fs = std::filesystem;
  char tmpl[] = "/tmp/tmla-codec-XXXXXX";
  char* dir = mkdtemp(tmpl);
  if (!dir) throw std::runtime_error("external codec: mkdtemp failed");
  const fs::path work(dir);
  const fs::path in = work / "input.png";
  const fs::path out = work / "output.png";

  struct Cleanup {
    fs::path p;
    ~Cleanup() {
      std::error_code ec;
      fs::remove_all(p, ec);
    }
  } cleanup{work};

  save_png(in.string(), x);

  int pipefd[2];
  if (pipe(pipefd) != 0) throw std::runtime_error("external codec: pipe failed");

  const std::string full = command + " '" + in.string() + "' '" + out.string() + "'";
  const pid_t pid = fork();
  if (pid < 0) throw std::runtime_error("external codec: fork failed");
  if (pid == 0) {
    dup2(pipefd[1], STDOUT_FILENO);
    close(pipefd[0]);
    close(pipefd[1]);
    execl("/bin/sh", "sh", "-c", full.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(pipefd[1]);

  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
  auto time_left = [&] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(deadline -
                                                                 std::chrono::steady_clock::now());
  };
  auto give_up = [&]() -> std::runtime_error {
    kill(pid, SIGKILL);
    int st;
    waitpid(pid, &st, 0);
    close(pipefd[0]);
    return std::runtime_error("external codec: timeout after " + std::to_string(timeout_ms) + " ms");
  };

  std::string captured;
  for (;;) {
    const auto left = time_left();
    if (left.count() <= 0) throw give_up();
    fd_set rfds;
    FD_ZERO(&rfds);
    FD_SET(pipefd[0], &rfds);
    timeval tv{static_cast<time_t>(left.count() / 1000),
               static_cast<suseconds_t>(left.count() % 1000 * 1000)};
    const int sel = select(pipefd[0] + 1, &rfds, nullptr, nullptr, &tv);
    if (sel == 0) throw give_up();
    if (sel < 0) {
      if (errno == EINTR) continue;
      close(pipefd[0]);
      throw std::runtime_error("external codec: select failed");
    }
    char buf[4096];
    const ssize_t n = read(pipefd[0], buf, sizeof buf);
    if (n < 0) {
      close(pipefd[0]);
      throw std::runtime_error("external codec: read failed");
    }
    if (n == 0) break;  // EOF
    captured.append(buf, static_cast<std::size_t>(n));
  }
  close(pipefd[0]);

  int status = 0;
  for (;;) {
    const pid_t r = waitpid(pid, &status, WNOHANG);
    if (r == pid) break;
    if (r < 0) throw std::runtime_error("external codec: waitpid failed");
    if (time_left().count() <= 0) throw give_up();
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
    throw std::runtime_error("external codec: command failed (status " +
                             std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : -1) + ")");

  double bpp = 0.0;
  try {
    bpp = std::stod(captured);
  } catch (const std::exception&) {
    throw std::runtime_error("external codec: expected a decimal bpp on stdout, got '" + captured + "'");
  }

  Image recon = load_png(out.string());
  if (!recon.same_shape(x))
    throw std::runtime_error("external codec: reconstruction shape mismatch");
  return {std::move(recon), bpp};
}

CodecContract make_external_codec(const std::string& command, int timeout_ms) {
  CodecContract c;
  c.descriptor = "external:" + command;
  c.forward = [command, timeout_ms](const Image& x) {
    return external_codec_eval(x, command, timeout_ms);
  };
  c.vjp = nullptr;  // metrics-only path
  return c;
}

}  // namespace tmla
