/**
 * Pure projection of a detection-report payload into what the console draws.
 *
 * No inference happens here: probabilities and labels pass through verbatim,
 * and node colors come only from the server-assigned risk flag ("high" is
 * red, everything else blue). The ego carries no risk flag, so it is always
 * blue. A payload that does not match the documented report shape raises
 * PayloadError so the caller can show an error state instead of a partial
 * render.
 */

export class PayloadError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "PayloadError";
  }
}

export type NodeColor = "red" | "blue";

export interface ProfileView {
  name: string;
  followersCount: number;
  followingCount: number;
  description: string;
}

export interface NodeView {
  id: string;
  color: NodeColor;
  probability: number;
  probabilityText: string;
  isEgo: boolean;
}

export interface EdgeView {
  source: string;
  target: string;
}

export interface ReportViewModel {
  accountId: string;
  profile: ProfileView;
  probability: number;
  /** Decimal text of the probability; parses back to the exact payload
   * value (shortest round-trip formatting). */
  probabilityText: string;
  predictedLabel: number;
  verdict: "bot" | "human";
  modelVersion: string;
  nodes: NodeView[];
  edges: EdgeView[];
}

export interface FeedbackView {
  id: string;
  accountId: string;
  proposedLabel: number;
  status: string;
}

function asRecord(value: unknown, where: string): Record<string, unknown> {
  if (typeof value !== "object" || value === null || Array.isArray(value)) {
    throw new PayloadError(`${where} is not an object`);
  }
  return value as Record<string, unknown>;
}

function requireString(
  obj: Record<string, unknown>,
  key: string,
  where: string,
): string {
  const value = obj[key];
  if (typeof value !== "string") {
    throw new PayloadError(`${where}.${key} is not a string`);
  }
  return value;
}

function requireNumber(
  obj: Record<string, unknown>,
  key: string,
  where: string,
): number {
  const value = obj[key];
  if (typeof value !== "number" || !Number.isFinite(value)) {
    throw new PayloadError(`${where}.${key} is not a finite number`);
  }
  return value;
}

function requireInteger(
  obj: Record<string, unknown>,
  key: string,
  where: string,
): number {
  const value = requireNumber(obj, key, where);
  if (!Number.isInteger(value)) {
    throw new PayloadError(`${where}.${key} is not an integer`);
  }
  return value;
}

function colorFor(riskFlag: string): NodeColor {
  return riskFlag === "high" ? "red" : "blue";
}

export function toViewModel(payload: unknown): ReportViewModel {
  const report = asRecord(payload, "report");
  const accountId = requireString(report, "account_id", "report");
  const probability = requireNumber(report, "bot_probability", "report");
  const predictedLabel = requireInteger(report, "predicted_label", "report");
  if (predictedLabel !== 0 && predictedLabel !== 1) {
    throw new PayloadError("report.predicted_label is not 0 or 1");
  }
  const modelVersion = requireString(report, "model_version", "report");

  const rawProfile = asRecord(report["profile"], "report.profile");
  const profile: ProfileView = {
    name: requireString(rawProfile, "name", "report.profile"),
    followersCount: requireInteger(
      rawProfile,
      "followers_count",
      "report.profile",
    ),
    followingCount: requireInteger(
      rawProfile,
      "following_count",
      "report.profile",
    ),
    description: requireString(rawProfile, "description", "report.profile"),
  };

  const rawNeighbors = report["neighbor_results"];
  if (!Array.isArray(rawNeighbors)) {
    throw new PayloadError("report.neighbor_results is not an array");
  }

  const nodes: NodeView[] = [
    {
      id: accountId,
      color: "blue",
      probability,
      probabilityText: String(probability),
      isEgo: true,
    },
  ];
  const edges: EdgeView[] = [];
  const seen = new Set<string>([accountId]);
  rawNeighbors.forEach((entry, i) => {
    const where = `report.neighbor_results[${i}]`;
    const neighbor = asRecord(entry, where);
    const id = requireString(neighbor, "node_id", where);
    if (seen.has(id)) {
      throw new PayloadError(`${where}.node_id ${JSON.stringify(id)} repeats`);
    }
    seen.add(id);
    const p = requireNumber(neighbor, "bot_probability", where);
    const flag = requireString(neighbor, "risk_flag", where);
    nodes.push({
      id,
      color: colorFor(flag),
      probability: p,
      probabilityText: String(p),
      isEgo: false,
    });
    edges.push({ source: accountId, target: id });
  });

  return {
    accountId,
    profile,
    probability,
    probabilityText: String(probability),
    predictedLabel,
    verdict: predictedLabel === 1 ? "bot" : "human",
    modelVersion,
    nodes,
    edges,
  };
}

export function toFeedbackView(payload: unknown): FeedbackView {
  const record = asRecord(payload, "feedback");
  return {
    id: requireString(record, "id", "feedback"),
    accountId: requireString(record, "account_id", "feedback"),
    proposedLabel: requireInteger(record, "proposed_label", "feedback"),
    status: requireString(record, "status", "feedback"),
  };
}
