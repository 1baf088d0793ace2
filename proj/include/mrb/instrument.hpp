// SPDX-License-Identifier: Apache-2.0

#ifndef MRB_INSTRUMENT_HPP
#define MRB_INSTRUMENT_HPP

#include <algorithm>
#include <chrono>
#include <cstdint>

namespace mrb
{

// Counts simultaneously live dense matrix entries held by the pipelines and remembers the
// peak. Pipelines take a lease for every large dense temporary.
class StorageMeter
{
public:
  class Lease
  {
  public:
    Lease(StorageMeter *meter, std::int64_t entries) : meter_(meter), entries_(entries)
    {
      if (meter_)
      {
        meter_->current_ += entries_;
        meter_->peak_ = std::max(meter_->peak_, meter_->current_);
      }
    }
    Lease(const Lease &) = delete;
    Lease &operator=(const Lease &) = delete;
    ~Lease()
    {
      if (meter_)
      {
        meter_->current_ -= entries_;
      }
    }

  private:
    StorageMeter *meter_;
    std::int64_t entries_;
  };

  std::int64_t peak() const { return peak_; }
  std::int64_t current() const { return current_; }
  void reset() { current_ = peak_ = 0; }

private:
  std::int64_t current_ = 0, peak_ = 0;
};

class Stopwatch
{
public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const
  {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }
  void restart() { start_ = std::chrono::steady_clock::now(); }

private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace mrb

#endif  // MRB_INSTRUMENT_HPP
