// End-to-end CLI checks: spawns the installed binary and inspects exit codes
// and artifacts.

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void expect(bool ok, const std::string& what) {
    if (!ok) {
        ++g_failures;
        std::cerr << "FAIL: " << what << "\n";
    }
}

int run(const std::string& cmd) {
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

void write(const fs::path& p, const std::string& body) {
    std::ofstream f(p);
    f << body;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: test_cli_driver <path-to-cli>\n";
        return 1;
    }
    const std::string cli = argv[1];
    const fs::path tmp = fs::temp_directory_path() / "pam_cli_test";
    fs::remove_all(tmp);
    fs::create_directories(tmp);

    // partition run: exit 0, display on stdout, artifacts in place
    write(tmp / "p5.json", R"({"experiment":"partition","numerics":{"p":5},"seed":1})");
    const int rc1 = run(cli + " run -c " + (tmp / "p5.json").string() + " -o " +
                        (tmp / "out1").string() + " > " + (tmp / "stdout1").string());
    expect(rc1 == 0, "partition run exits 0");
    expect(slurp(tmp / "stdout1").find("G1 = B(x5 - x2) + B(x4 - x3)") != std::string::npos,
           "grouped display printed");
    expect(fs::exists(tmp / "out1" / "results.csv"), "results.csv written");
    expect(fs::exists(tmp / "out1" / "manifest.json"), "manifest.json written");

    // malformed config: exit 2 and a normalization message
    write(tmp / "bad.json",
          R"({"experiment":"classify","model":{"kernel":{"type":"custom","dim":1,
              "entries":[[[1],0.3],[[-1],0.3]]},"alpha":0.5}})");
    const int rc2 = run(cli + " run -c " + (tmp / "bad.json").string() + " -o " +
                        (tmp / "out2").string() + " 2> " + (tmp / "stderr2").string());
    expect(rc2 == 2, "malformed config exits 2");
    expect(slurp(tmp / "stderr2").find("normalization") != std::string::npos,
           "normalization named in the message");

    // classify run via config, seed override keeps working
    write(tmp / "cls.json",
          R"({"experiment":"classify","model":{"kernel":{"type":"nn","dim":2},"alpha":1.9}})");
    const int rc3 = run(cli + " run -c " + (tmp / "cls.json").string() + " --seed 9 -o " +
                        (tmp / "out3").string() + " > /dev/null");
    expect(rc3 == 0, "classify run exits 0");
    expect(slurp(tmp / "out3" / "results.csv").find("transient") != std::string::npos,
           "classify row present");

    // sweep over sigma: the found flag flips exactly once (monotone)
    write(tmp / "sw.json",
          R"({"experiment":"spectrum","model":{"kernel":{"type":"nn","dim":1},
              "V":{"type":"delta0"},"sigma":1.0},"numerics":{"L":64},"seed":1})");
    const int rc4 = run(cli + " sweep -c " + (tmp / "sw.json").string() +
                        " -p model.sigma -v 0.02,0.4,0.8,1.6 -o " + (tmp / "out4").string() +
                        " > /dev/null");
    expect(rc4 == 0, "sweep exits 0");
    const auto combined = slurp(tmp / "out4" / "combined.csv");
    int flips = 0;
    {
        std::istringstream ss(combined);
        std::string line;
        std::getline(ss, line);
        int prev = -1;
        while (std::getline(ss, line)) {
            // found flag is the third field after the header prefix
            std::vector<std::string> cols;
            std::stringstream ls(line);
            std::string c;
            while (std::getline(ls, c, ',')) cols.push_back(c);
            const int found = std::stoi(cols[4]);
            if (prev >= 0 && found != prev) ++flips;
            prev = found;
        }
    }
    expect(flips == 1, "positive_eigenvalue_found flips exactly once along the sigma sweep");

    // missing subcommand is a usage error
    const int rc5 = run(cli + " > /dev/null 2>&1");
    expect(rc5 != 0, "bare invocation fails");

    if (g_failures == 0) {
        std::cout << "cli driver: all checks passed\n";
        fs::remove_all(tmp);
        return 0;
    }
    std::cerr << g_failures << " CLI check(s) failed; artifacts kept in " << tmp << "\n";
    return 1;
}
