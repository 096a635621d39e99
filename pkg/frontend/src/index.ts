export { COLORMAP_NAMES, sampleColormap, type ColormapName } from "./colormap.js";
export {
  ParseError,
  columnIndex,
  looseNumericColumn,
  numericColumn,
  parseCsv,
  stringColumn,
  type Table,
} from "./csv.js";
export {
  FIGURE_KINDS,
  energySliceFigure,
  learningCurveFigure,
  lowestPathFigure,
  muCompositionFigure,
  nucleationMapFigure,
  snapshotsFigure,
  timeSeriesFigure,
  type AxisSpec,
  type FigureKind,
  type FigureOptions,
  type LearningCurveData,
  type LowestPathData,
  type MuCompositionData,
  type NucleationMapData,
  type SlicePanel,
  type Snapshot,
  type TimeSeriesData,
} from "./figures.js";
export { gridMax, gridMin, parseGrid, type Grid } from "./grid.js";
export { renderFigure, writeFigure, type FigureSpec } from "./render.js";
export { formatValue, niceTicks, scaleLinear, type Domain } from "./svg.js";
