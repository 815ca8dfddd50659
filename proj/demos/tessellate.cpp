// Samples a Poisson configuration on a certified window and prints the
// tessellation structure as JSON: nuclei, retained adjacencies, Voronoi
// vertices, and per-cell reach data for the cells meeting the unit ball.

#include <cstdio>
#include <string>

#include "hypervoro/io.hpp"
#include "hypervoro/rng.hpp"
#include "hypervoro/tessellation.hpp"
#include "hypervoro/window.hpp"

int main(int argc, char** argv) {
  using namespace hypervoro;
  double lambda = argc > 1 ? std::stod(argv[1]) : 1.0;
  double n = argc > 2 ? std::stod(argv[2]) : 2.0;
  std::uint64_t seed = argc > 3 ? std::stoull(argv[3]) : 1;

  auto sample = sample_certified_window(lambda, n, RngStream(seed));
  Json j = sample.tess->debug_json();
  j["lambda"] = lambda;
  j["n"] = n;
  j["seed"] = seed;
  j["window_radius"] = sample.cfg.window_radius;
  j["coverage"] = sample.coverage;
  j["rings"] = sample.rings;
  j["owner0"] = sample.owner0;
  j["cells_meeting_ball"] = Json::array();
  for (std::uint32_t c : sample.tess->cells_meeting_ball(n)) {
    double reach = sample.tess->cell_reach(c);
    j["cells_meeting_ball"].push_back(
        {{"cell", c},
         {"min_origin", sample.tess->cell_min_origin(c)},
         {"reach", std::isfinite(reach) ? Json(reach) : Json("unbounded")}});
  }
  std::printf("%s\n", j.dump(2).c_str());
  return 0;
}
