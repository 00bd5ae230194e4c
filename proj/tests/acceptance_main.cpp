// One line per acceptance criterion; exit status 1 if any fails.
#include <cstdio>
#include <cstdlib>
#include <string>

#include "blowup/acceptance.hpp"

int main(int argc, char** argv) {
    namespace acc = blowup::acceptance;
    int lo = 1, hi = static_cast<int>(acc::criteria().size());
    if (argc == 2) lo = hi = std::atoi(argv[1]);
    int failed = 0;
    for (int id = lo; id <= hi; ++id) {
        const auto r = acc::run_criterion(id);
        std::printf("%s\n", acc::format_line(r).c_str());
        std::fflush(stdout);
        if (!r.pass) ++failed;
    }
    std::printf("%d of %d criteria passed\n", hi - lo + 1 - failed, hi - lo + 1);
    return failed == 0 ? 0 : 1;
}
