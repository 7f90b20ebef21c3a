#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <algorithm>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include <boost/asio.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

std::string drain(int fd) {
  std::string s;
  char buf[4096];
  ssize_t n;
  while ((n = read(fd, buf, sizeof buf)) > 0) s.append(buf, static_cast<std::size_t>(n));
  return s;
}

// Spawns the CLI with stdout and stderr captured.
class Child {
 public:
  Child(const std::vector<std::string>& args, const std::vector<std::string>& env = {}) {
    int out[2], err[2];
    REQUIRE(pipe(out) == 0);
    REQUIRE(pipe(err) == 0);
    pid_ = fork();
    REQUIRE(pid_ >= 0);
    if (pid_ == 0) {
      dup2(out[1], 1);
      dup2(err[1], 2);
      close(out[0]);
      close(err[0]);
      for (const auto& e : env) putenv(const_cast<char*>(e.c_str()));
      std::vector<char*> argv{const_cast<char*>(BEDSIM_CLI)};
      for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
      argv.push_back(nullptr);
      execv(BEDSIM_CLI, argv.data());
      _exit(127);
    }
    close(out[1]);
    close(err[1]);
    out_ = out[0];
    err_ = err[0];
  }

  ~Child() {
    if (pid_ > 0) {
      kill(pid_, SIGKILL);
      waitpid(pid_, nullptr, 0);
    }
    close(out_);
    close(err_);
  }

  // Reads one stdout line, waiting up to timeout_ms.
  std::string read_line(int timeout_ms = 10000) {
    std::string line;
    char c;
    while (true) {
      pollfd p{out_, POLLIN, 0};
      if (poll(&p, 1, timeout_ms) <= 0) break;
      if (read(out_, &c, 1) != 1) break;
      if (c == '\n') break;
      line += c;
    }
    return line;
  }

  void signal(int sig) { kill(pid_, sig); }

  Result wait() {
    Result r;
    r.out = drain(out_);
    r.err = drain(err_);
    int status = 0;
    waitpid(pid_, &status, 0);
    pid_ = -1;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
    return r;
  }

 private:
  pid_t pid_ = -1;
  int out_ = -1;
  int err_ = -1;
};

Result cli(const std::vector<std::string>& args, const std::vector<std::string>& env = {}) {
  return Child(args, env).wait();
}

std::string scenario(const char* name) {
  return std::string(BEDSIM_SCENARIO_DIR) + "/" + name + ".json";
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("bedsim_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_file(const fs::path& path, const std::string& text) {
  std::ofstream(path) << text;
  return path;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("run converges and exports") {
  const fs::path dir = scratch("run");
  const Result r = cli({"run", "--scenario", scenario("canonical_standard"), "--csv", dir.string(), "--heatmap"});
  CHECK(r.code == 0);
  const json report = json::parse(r.out);
  CHECK(report["converged"] == true);
  CHECK(report["support_size"] == 53);
  CHECK(std::abs(report["final_target_kgf"].get<double>() - 1.5094) < 1e-4);
  CHECK(r.err.find('#') != std::string::npos);
  for (const char* f : {"pressures.csv", "extensions.csv", "support.csv", "trace.csv"})
    CHECK(fs::exists(dir / f));

  const fs::path again = scratch("run_again");
  const Result r2 = cli({"run", "--scenario", scenario("canonical_standard"), "--csv", again.string()});
  CHECK(r2.out == r.out);
  for (const char* f : {"pressures.csv", "extensions.csv", "support.csv", "trace.csv"})
    CHECK(slurp(dir / f) == slurp(again / f));
}

TEST_CASE("exit codes") {
  const fs::path dir = scratch("codes");
  const auto short_run = write_file(dir / "short.json",
      R"({"name":"short","profile":"adult_supine_80","max_ticks":1,"perturbations":[{"tick":0,"cell":[3,1],"extension_delta_mm":5}]})");
  const Result not_converged = cli({"run", "--scenario", short_run.string()});
  CHECK(not_converged.code == 2);
  CHECK(json::parse(not_converged.out)["converged"] == false);

  const Result gate = cli({"run", "--scenario", scenario("toy_gate")});
  CHECK(gate.code == 3);
  const json g = json::parse(gate.out);
  CHECK(g["status"] == "gate_rejected");
  CHECK(std::abs(g["weight_kgf"].get<double>() - 10.0) < 0.1);

  const auto invalid = write_file(dir / "invalid.json", R"({"name":"x","profile":"adult_supine_80","mode":"firm"})");
  const Result bad = cli({"run", "--scenario", invalid.string()});
  CHECK(bad.code == 4);
  CHECK(json::parse(bad.out)["status"] == "validation");

  CHECK(cli({"run", "--scenario", (dir / "missing.json").string()}).code == 1);
  CHECK(cli({"run"}).code == 4);
  CHECK(cli({"bogus"}).code == 4);
  CHECK(cli({"--version"}).code == 0);
}

TEST_CASE("seed override from the environment") {
  const Result base = cli({"run", "--scenario", scenario("noisy_standard")});
  const Result seeded = cli({"run", "--scenario", scenario("noisy_standard")}, {"BEDSIM_SEED=9"});
  CHECK(json::parse(base.out)["seed"] == 42);
  CHECK(json::parse(seeded.out)["seed"] == 9);
  CHECK(base.out != seeded.out);
}

TEST_CASE("profile commands") {
  const Result list = cli({"profile", "list"});
  CHECK(list.code == 0);
  const json names = json::parse(list.out);
  CHECK(std::any_of(names.begin(), names.end(), [](const auto& p) { return p["name"] == "adult_supine_80"; }));

  const fs::path dir = scratch("profile");
  const auto good = write_file(dir / "good.json",
      R"({"name":"pair","weight_kgf":30,"grid":{"rows":1,"cols":2},"clearance_mm":[[0,null]]})");
  const Result ok = cli({"profile", "validate", good.string()});
  CHECK(ok.code == 0);
  CHECK(json::parse(ok.out)["name"] == "pair");

  const auto neg = write_file(dir / "neg.json",
      R"({"name":"neg","weight_kgf":30,"grid":{"rows":1,"cols":2},"clearance_mm":[[-1,0]]})");
  const Result bad = cli({"profile", "validate", neg.string()});
  CHECK(bad.code == 4);
  CHECK(json::parse(bad.out)["message"].get<std::string>().find("(0,0)") != std::string::npos);
}

TEST_CASE("serve answers requests and stops on SIGINT") {
  Child server({"serve", "--scenario", scenario("canonical_standard"), "--address", "127.0.0.1",
                "--port", "0", "--ws-port", "0", "--fast"});
  const json hello = json::parse(server.read_line());
  CHECK(hello["status"] == "listening");
  const int port = hello["port"];
  CHECK(hello["ws_port"].get<int>() > 0);

  {
    namespace net = boost::asio;
    net::io_context ioc;
    net::ip::tcp::socket sock(ioc);
    sock.connect({net::ip::make_address("127.0.0.1"), static_cast<unsigned short>(port)});
    net::write(sock, net::buffer(std::string("{\"v\":1,\"type\":\"activate\",\"mode\":\"standard\"}\n"
                                             "{\"v\":1,\"type\":\"get_status\"}\n")));
    net::streambuf buf;
    std::istream in(&buf);
    std::string line;
    net::read_until(sock, buf, '\n');
    std::getline(in, line);
    CHECK(line == "{\"v\":1,\"type\":\"ack\",\"request_type\":\"activate\"}");
    net::read_until(sock, buf, '\n');
    std::getline(in, line);
    const json status = json::parse(line);
    CHECK(status["type"] == "status");
    CHECK(status["active"] == true);
  }

  server.signal(SIGINT);
  const Result r = server.wait();
  CHECK(r.code == 0);
  CHECK(r.out.find("{\"status\":\"stopped\"}") != std::string::npos);
}

TEST_CASE("serve reports a busy port") {
  Child first({"serve", "--scenario", scenario("canonical_standard"), "--address", "127.0.0.1",
               "--port", "0", "--ws-port", "0"});
  const int port = json::parse(first.read_line())["port"];
  const Result clash = cli({"serve", "--scenario", scenario("canonical_standard"), "--address",
                            "127.0.0.1", "--port", std::to_string(port), "--ws-port", "0"});
  CHECK(clash.code == 1);
  CHECK(json::parse(clash.out)["status"] == "io");
  first.signal(SIGTERM);
  CHECK(first.wait().code == 0);
}
