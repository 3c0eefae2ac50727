/** Canned service payloads shared by the suites. */

export function reportPayload(
  overrides: Record<string, unknown> = {},
): Record<string, unknown> {
  return {
    account_id: "ego1",
    bot_probability: 0.8741312319412231,
    predicted_label: 1,
    neighbor_results: [
      { node_id: "n1", bot_probability: 0.9102345670000001, risk_flag: "high" },
      { node_id: "n2", bot_probability: 0.8677999999999999, risk_flag: "high" },
      { node_id: "n3", bot_probability: 0.1204, risk_flag: "normal" },
    ],
    model_version: "v-abc123",
    created_at: 1723600000.25,
    profile: {
      name: "Ego One",
      followers_count: 42,
      following_count: 7,
      description: "posting since 2019",
    },
    ...overrides,
  };
}

export function feedbackPayload(
  overrides: Record<string, unknown> = {},
): Record<string, unknown> {
  return {
    id: "fb-0001",
    account_id: "ego1",
    proposed_label: 0,
    submitter_id: "op1",
    status: "pending",
    model_version: "v-abc123",
    created_at: 1723600100.5,
    reviewer_id: null,
    reviewer_decision_at: null,
    ...overrides,
  };
}
