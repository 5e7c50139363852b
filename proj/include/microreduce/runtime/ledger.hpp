#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "microreduce/runtime/runtime.hpp"

namespace microreduce::runtime {

/// Header line of the exported invocation ledger.
inline constexpr const char* kLedgerHeader =
    "function,execution_id,instance_id,cold_start,init_ms,duration_ms,billed_gb_ms,max_mem_used_mb,outcome";

void write_ledger_csv(std::ostream& out, const std::vector<InvocationRecord>& records);
/// Parses a ledger written by write_ledger_csv. memory_mb is recovered from
/// billed_gb_ms / duration_ms; start_ms and error are left empty.
std::vector<InvocationRecord> read_ledger_csv(std::istream& in);

}  // namespace microreduce::runtime
