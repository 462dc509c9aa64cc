/** Runtime reconfiguration editor model.
 *
 * Edits become one patch document posted to /api/patch; the service
 * validates against the full merged config and answers with either the
 * derived figures or a field-path error. Nothing is changed locally on
 * success: the effect must show up in telemetry on its own, or it did not
 * really happen.
 */

export interface BallastEdit {
  mass: number;
  position: [number, number, number];
}

export interface PatchDraft {
  ballast?: BallastEdit[];
  removeThrusters?: string[];
  waterDensity?: number;
  wave?: { amplitude: number; wavelength: number; period: number } | null;
}

export interface PatchDocument {
  vehicle?: Record<string, unknown>;
  environment?: Record<string, unknown>;
}

/** Shape a form draft into the wire patch document. */
export function buildPatch(draft: PatchDraft): PatchDocument {
  const doc: PatchDocument = {};
  const vehicle: Record<string, unknown> = {};
  if (draft.ballast !== undefined) {
    vehicle.body = {
      ballast: draft.ballast.map((b) => ({ mass: b.mass, position: b.position })),
    };
  }
  if (draft.removeThrusters !== undefined && draft.removeThrusters.length > 0) {
    vehicle.thrusters = { remove: draft.removeThrusters };
  }
  if (Object.keys(vehicle).length > 0) doc.vehicle = vehicle;

  const environment: Record<string, unknown> = {};
  if (draft.waterDensity !== undefined) environment.water_density = draft.waterDensity;
  if (draft.wave !== undefined) environment.wave = draft.wave;
  if (Object.keys(environment).length > 0) doc.environment = environment;
  return doc;
}

export interface PatchResult {
  applied: boolean;
  detail: string;
}

export type HttpPost = (url: string, body: unknown) => Promise<{ status: number; json: unknown }>;

export const fetchPost: HttpPost = async (url, body) => {
  const resp = await fetch(url, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(body),
  });
  return { status: resp.status, json: await resp.json() };
};

/** Submit a patch; rejections surface as {applied: false, detail}. */
export async function submitPatch(
  baseUrl: string,
  doc: PatchDocument,
  post: HttpPost = fetchPost,
): Promise<PatchResult> {
  const { json } = await post(`${baseUrl}/api/patch`, doc);
  if (typeof json === "object" && json !== null) {
    const r = json as Record<string, unknown>;
    if (typeof r.applied === "boolean") {
      return { applied: r.applied, detail: typeof r.detail === "string" ? r.detail : "" };
    }
    // validation-layer errors arrive as {detail: ...} without "applied"
    if (r.detail !== undefined) return { applied: false, detail: JSON.stringify(r.detail) };
  }
  return { applied: false, detail: "unrecognized response" };
}
