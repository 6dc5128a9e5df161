/* Copyright 2026 The CIM Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
=============================================================================*/

// Writes a synthetic fixture pack and walks its first sample through the
// library: dictionary -> weights -> heatmap -> FLA score.
//
//   make_synthetic_pack <out_dir> [n_images]
//   cim fla <out_dir>/manifest.json --output <out_dir>/report

#include <cstdlib>
#include <iostream>
#include <string>

#include "cim/cim.hpp"

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: " << argv[0] << " <out_dir> [n_images]\n";
    return 1;
  }
  cim::synthetic::PackSpec spec;
  if (argc > 2) spec.n_images = static_cast<std::size_t>(std::stoul(argv[2]));

  try {
    const auto manifest = cim::synthetic::write_pack(spec, argv[1]);
    std::cout << "wrote " << spec.n_images << " samples, manifest " << manifest.string() << "\n";

    const auto sample = cim::synthetic::make_sample(spec, 0);
    const cim::Dictionary d = cim::flatten_to_dictionary(sample.feature_map);
    const cim::WeightVector w = cim::solve(d, sample.feature_vector);
    std::cout << sample.image_id << " weights:";
    for (double v : w.weights) std::cout << ' ' << v;
    std::cout << "\n  iterations " << w.iterations_used << ", objective " << w.final_objective << "\n";

    const auto nhm = cim::normalize_and_upsample(cim::synthesize(sample.feature_map, w), spec.image_size,
                                                 spec.image_size);
    const auto s = cim::score(cim::threshold_focus(nhm), std::span(&sample.box, 1));
    std::cout << "  FLA-1 " << cim::format_percent(s.fla1) << "%, FLA-2 " << cim::format_percent(s.fla2) << "%\n";
  } catch (const cim::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
