// Wire types mirroring the stack's HTTP API.

export interface TranscriptEntry {
  index: number;
  type: 'status' | 'catalog' | 'turn' | 'observation' | 'validator' | 'final';
  ts: number;
  status?: string;
  tools?: string[];
  turn?: TurnPayload;
  call_id?: string;
  tool?: string;
  result?: ToolResultPayload;
  verdict?: string;
  detail?: unknown;
  text?: string;
  flags?: string[];
}

export interface TurnPayload {
  kind: 'thought' | 'tool_call' | 'final_answer';
  turn_index: number;
  text?: string;
  tool_name?: string;
  arguments?: Record<string, unknown>;
  raw_llm_text: string;
}

export interface ToolResultPayload {
  callId: string;
  content: unknown;
  isError: boolean;
  errorKind?: string;
}

export interface IntentStatus {
  intent_id: string;
  text: string;
  submitted_at: number;
  status: 'running' | 'awaiting_approval' | 'done' | 'failed' | 'stopped';
  final_answer: string | null;
  pending_token: string | null;
  transcript_len: number;
}

export interface TraceResponse {
  intent: IntentStatus;
  entries: TranscriptEntry[];
}

export interface ApprovalInfo {
  token: string;
  action_summary: string;
  state: 'pending' | 'approved' | 'denied' | 'expired';
  requested_at: number;
  expires_at: number;
  consumed: boolean;
}

export interface ScheduleAction {
  action_id: string;
  change: {
    change_id: string;
    slice_name: string;
    field: string;
    mode: string;
    amount: number;
    baseline?: Record<string, number>;
  };
  window: { start: string; end: string; days: string[] };
  state: 'pending' | 'active' | 'reverted_idle' | 'cancelled';
  applied_at: number | null;
  reverted_at: number | null;
  created_at: number;
  cycles: number;
}

export interface CollectionInfo {
  name: string;
  count: number;
  min_ts: number;
  max_ts: number;
}

export interface TelemetryRecord {
  source_nf: string;
  metric: string;
  value: number;
  unit: string;
  timestamp_ms: number;
  dims: Record<string, string | number>;
}
