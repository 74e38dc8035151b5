#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "stik/solvers.hpp"

namespace stik {

/// Header `k,tau,Lambda,lambda_eff,res2,relerr,seconds`. relerr is empty
/// when unknown and seconds is 0 unless `timing`.
void write_records_csv(std::ostream& out, const std::vector<IterationRecord>& records, bool timing);

struct ReplicateRecords {
    long replicate = 0;
    std::vector<IterationRecord> records;
};

/// Same columns behind a leading `replicate` column.
void write_replicates_csv(std::ostream& out, const std::vector<ReplicateRecords>& runs, bool timing);

}  // namespace stik
