#include "mvdroid/train.hpp"

#include <cmath>
#include <iomanip>

namespace mvd {

std::string history_csv(const std::vector<EpochRecord>& history) {
  std::ostringstream out;
  out << "epoch,train_loss,val_loss,val_acc\n" << std::setprecision(9);
  for (const auto& r : history) out << r.epoch << ',' << r.train_loss << ',' << r.val_loss << ',' << r.val_acc << '\n';
  return out.str();
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(const std::vector<int>& labels,
                                                                               double fraction, std::uint64_t seed) {
  if (fraction < 0 || fraction > 1) throw Error(ErrorCode::BadConfig, "split fraction must lie in [0, 1]");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> first, second;
  for (int cls : {0, 1}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if ((labels[i] == 1 ? 1 : 0) == cls) members.push_back(i);
    std::shuffle(members.begin(), members.end(), rng);
    const auto take = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(members.size())));
    second.insert(second.end(), members.begin(), members.begin() + static_cast<long>(take));
    first.insert(first.end(), members.begin() + static_cast<long>(take), members.end());
  }
  std::sort(first.begin(), first.end());
  std::sort(second.begin(), second.end());
  return {first, second};
}

}  // namespace mvd
